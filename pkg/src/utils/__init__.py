# Utility modules for the CIA risk engine
