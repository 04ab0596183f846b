"""Project package for the repeated rights market simulator."""
