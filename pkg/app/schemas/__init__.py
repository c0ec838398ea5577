# Schemas module


