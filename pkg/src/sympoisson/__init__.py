"""Symmetric Poisson structures in coordinates.

Subpackages:

- expr       expression engine (parse / differentiate / evaluate)
- geometry   chart tensor calculus and the symmetric Cartan operators
- poisson    symmetric Poisson pairs, integrability verdicts, characteristic data
- pw         split-signature cotangent metric, its bracket and dynamics
- jj         Jacobi-Jordan algebras and linear structures
- liealg     left-invariant structures on Lie groups via structure constants
- algebroid  Killing tensors via the multivector bracket; cotangent bracket
- cli        batch front end (check / integrate / catalog / report)
"""

__version__ = "0.1.0"
