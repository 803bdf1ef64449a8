"""mfkit: exact matrix factorizations, structures, Ext and Knörrer periodicity."""

__version__ = "0.1.0"
