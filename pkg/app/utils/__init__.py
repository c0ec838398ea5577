# Utils module


