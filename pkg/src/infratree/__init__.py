"""Explicit-state security verification toolkit.

Finite transition systems and Kripke structures, a CTL model checker with
witness extraction, attack trees with constructive validity, quantitative
attack evaluation, infrastructure models (actors, locations, policies,
insiders), a textual model language, and a command-line front end.
"""

__version__ = "0.1.0"
