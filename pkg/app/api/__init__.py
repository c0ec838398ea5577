# API module


