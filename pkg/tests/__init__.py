# Tests module


