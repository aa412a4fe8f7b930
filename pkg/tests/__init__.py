# Test package for the CIA risk engine
