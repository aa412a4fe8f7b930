# CIA risk engine
# Registry, assessment, decision making and simulation packages
