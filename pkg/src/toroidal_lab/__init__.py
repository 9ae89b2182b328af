"""Numerical workbench for the quantum toroidal gl(1) algebra, its glued
extension A(M,N) and their free-field representations on degree-truncated
Fock spaces.

Modules:
  qkernel     parameters, q-Pochhammer/theta functions, truncated series
  fockspace   graded Fock spaces, oscillators, zero modes, operator currents
  vertexcalc  vertex operators, contractions, fusion, E1 relation checks
  amn         A(M,N) representations and relations (R1)-(R3)
  screening   screened intertwiners and the level-2 representation
  fermionR    fermionic construction of the R matrix
  cliverify   command line driver and reports
"""

__version__ = "0.1.0"
