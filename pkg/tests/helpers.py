import numpy as np

from quasiplanes.tools.geometry import random_orthonormal


def noisy_plane_cloud(rng, m, n, N, noise):
    """m points near a random n-plane through the origin of R^N."""
    U = random_orthonormal(N, n, rng)
    return rng.uniform(-1, 1, (m, n)) @ U.T + noise*rng.standard_normal((m, N))


def brute_force_H(domain, image):
    """
    Weak quasisymmetry constant straight from the definition: for every
    pair (a, y), the largest |f(x) - f(a)| over x with |x - a| <= |y - a|.
    """
    domain = np.asarray(domain, dtype=float)
    image = np.asarray(image, dtype=float)
    H = 1.0
    for a in range(len(domain)):
        d = np.linalg.norm(domain - domain[a], axis=1)
        g = np.linalg.norm(image - image[a], axis=1)
        for y in range(len(domain)):
            if d[y] == 0:
                continue
            H = max(H, float(np.max(g[d <= d[y]]))/g[y])
    return H
