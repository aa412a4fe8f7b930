# Simulation package
# Seeded monitor event streams standing in for cloud monitoring feeds
