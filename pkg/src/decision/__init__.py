# Decision package
# Analytic hierarchy process over pairwise judgment matrices
