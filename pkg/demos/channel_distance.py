"""Diamond distance between a qubit rotation and the identity channel.

For unitary channels the distance is 2 sin(theta/2) when the eigenphase gap
theta is at most pi. The cb 1->1 norm of the difference recovers this.
"""

import math

import numpy as np

from mixedschatten import cb_norm_1p
from mixedschatten.channels import identity_channel, linear_combination, unitary_channel

for theta in np.linspace(0, math.pi, 7):
    U = np.diag([1, np.exp(1j * theta)])
    diff = linear_combination([1, -1], [identity_channel(2), unitary_channel(U)])
    r = cb_norm_1p(diff, 1, eps=1e-6)
    print(f"theta={theta:.3f}  cb 1->1 {r.value:.6f}  formula {2 * math.sin(theta / 2):.6f}")
