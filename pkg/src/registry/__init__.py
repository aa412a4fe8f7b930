# Registry package
# Asset, threat, control and CIA event databases with immutable snapshots
