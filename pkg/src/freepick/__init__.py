"""Free noncommutative Pick functions over finite-dimensional C*-algebras."""
from .algebra import AlgebraSpec, AlgElement, MatPoint
from .cauchy import CauchyModel, asymptotic_residual, evaluate, moment, nonpolynomial_witness
from .cpmaps import LinMap, choi, is_completely_positive, is_homomorphic_on, tomiyama_check
from .herglotz import HerglotzData, NevanlinnaData, extract, nev_eval, pick_value

__all__ = [
    "AlgebraSpec", "AlgElement", "MatPoint", "CauchyModel", "asymptotic_residual", "evaluate",
    "moment", "nonpolynomial_witness", "LinMap", "choi", "is_completely_positive",
    "is_homomorphic_on", "tomiyama_check", "HerglotzData", "NevanlinnaData", "extract",
    "nev_eval", "pick_value",
]
