"""Derivative-based global sensitivity analysis toolkit.

Core subpackages: probability marginals (``distributions``), model functions
(``functions``, ``exprmodel``), sampling designs (``sampling``), measure
estimators (``estimators``), total-index bounds (``bounds``), a quadrature
reference (``oracle``), closed-form test references (``closedforms``), and the
config-driven runner behind the HTTP service (``service``) and CLI (``cli``).
"""

__version__ = "0.1.0"
