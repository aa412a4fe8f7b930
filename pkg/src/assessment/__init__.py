# Assessment package
# Probability composition, FAIR loss and risk, the assessment engine and the watch loop
