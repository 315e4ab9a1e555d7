"""Generator and carré-du-champ toolkit on the Thoma simplex."""

__version__ = "0.1.0"
