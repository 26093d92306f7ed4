# Tactile contour workbench package
