"""Settings package for the fracpme Django project."""
