"""Config package for the fracpme Django project."""
