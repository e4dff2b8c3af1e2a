# Tests package for multab-lab
