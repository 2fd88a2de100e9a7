"""
The determining equations of the Cartesian ansatz
=================================================

Commute a fully general Q = p1^2 + f.p + gamma1 and P = p2^2 + g.p + gamma2
with H, split by momentum order and powers of hbar, and check that every
catalog entry annihilates the result.
"""

from collections import Counter

from qintcart.catalog import CASE_IDS, make_case
from qintcart.determining import check_A_general_solution, generate, substitute_case
from qintcart.expr import to_string

system = generate()
print(len(system), "residuals")
print(Counter((r.order, r.hbar_power) for r in system))

# the order-2 (leading) relations: first-order PDEs on f, g and A
for r in system.select(order=2):
    print(f"  [{r.commutator}] p^{r.index}: {to_string(r.expr)} = 0")

#############################################################################
# The general solution for A written with s(x,y,z), k1(x,z), k2(y,z) and the
# one-variable functions solves all of them. Making g1 depend on x breaks it.
print("\ngeneral A solution:", check_A_general_solution())
print("with g1 = g1(x):   ", check_A_general_solution(g1_variable="x"))

#############################################################################
# Substitute every catalog entry, rewriting f'' and g'' through the case ODEs.
bad = [cid for cid in CASE_IDS if not substitute_case(system, make_case(cid)).passed]
print("\ncases leaving a nonzero residual:", bad or "none")
