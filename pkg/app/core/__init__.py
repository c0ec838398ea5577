# Core module


