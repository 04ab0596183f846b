import os

import django

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'rights_market_project.settings')
django.setup()
