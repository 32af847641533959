# Tests package for lfsgeo
