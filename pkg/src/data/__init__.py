# Source models and seeded sample streams
