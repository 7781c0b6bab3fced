"""Remote state preparation: sender-side projection and receiver predictions.

The sender measures one photon of a shared pair; post-selecting on the
transmitted port leaves the receiver photon in a conditional state. No
correction unitary is applied (successful events are simply post-selected),
so the prepared state is the renormalized partial trace of the projected pair
state.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ZeroProbabilityProjection
from .quantum import kron, partial_trace

PROBABILITY_FLOOR = 1e-12


@dataclass(frozen=True)
class RspTask:
    """One protocol run: who projects onto what, and the intended state."""

    link: str
    sender: str
    projection_label: str
    target_label: str


def rsp_predict(rho, projector, sender_slot):
    """Receiver conditional state and success probability.

    sender_slot selects which tensor factor the sender's rank-1 projector acts
    on (0 = first node of the link, 1 = second).
    """
    rho = np.asarray(rho, dtype=complex)
    projector = np.asarray(projector, dtype=complex)
    if sender_slot == 0:
        op = kron(projector, np.eye(2))
        keep = 1
    elif sender_slot == 1:
        op = kron(np.eye(2), projector)
        keep = 0
    else:
        raise ValueError("sender_slot must be 0 or 1")
    projected = op @ rho @ op.conj().T
    probability = float(np.trace(projected).real)
    if probability <= PROBABILITY_FLOOR:
        raise ZeroProbabilityProjection(
            f"projection success probability {probability:.3e} is numerically zero")
    return partial_trace(projected / probability, keep=keep), probability
