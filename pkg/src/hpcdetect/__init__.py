"""Hardware-performance-counter and opcode based attack detection toolkit."""

__version__ = "0.1.0"
