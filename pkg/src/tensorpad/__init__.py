"""Scratch-pad computer algebra for tensor field theory."""

from .expr import (Expression, ExprNode, ParentRel, Rational, equal_subtree,
                   normalize)
from .notation import ParseError, SourceLine, parse, parse_line, print_tex
from .properties import (DeclarationError, Pattern, PropertyRecord,
                         PropertyRegistry, commutation_sign, declare,
                         make_record, query)
from .indices import (IndexClassification, IndexSet, classify_indices,
                      fresh_dummy, index_iterator, index_set_of, index_sets,
                      relabel_on_insert, rename_dummies)
from .canonical import canonicalise, sort_factors
from .young import (BasisError, CoefficientVector, MonomialBasis,
                    SlotPermutationSum, SymmetryError, YoungTableau,
                    all_contractions, asym, build_basis, decompose,
                    reduce_sum, young_project, young_projector)
from .algorithms import (CommandError, CommandResult, RuleError, RuleSet,
                         collect_terms, distribute, indexsort, list_sum,
                         pintegrate, prodrule, prodsort, substitute, vary)
from .session import Session, SessionError, run_script

__version__ = "0.1.0"
