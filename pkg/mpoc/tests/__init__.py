# Test package for the MPOC toolkit app
