"""Reduced-basis effective model of an imperfectly blockaded Rydberg superatom."""

__version__ = "0.1.0"
