"""Domain layer: enums, models, exceptions and protocols."""
