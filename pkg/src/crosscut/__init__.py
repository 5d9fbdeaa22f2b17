"""crosscut: synthesize, analyze and reconstruct crossing cuts polygonal jigsaw puzzles."""

__version__ = "0.1.0"
