"""Vectorized numpy assembly kernels (fallback for the compiled core).

Weak residual of the graph equation on P1 triangles, one-point centroid
quadrature for the nonlinear terms::

    F_i = sum_T |T| [ Du.Dphi_i / W  -  (1/3) (2/u_c) (1/W - H) ],
    W = sqrt(1 + |Du|^2),  u_c = mean of the vertex values of T.

``F`` is the negative of the weak form of ``div(Du/W) + (2/u)(1/W - H)``.
"""
import numpy as np


def element_gradients(tri, dphi, u):
    return np.einsum("tk,tkd->td", u[tri], dphi)


def residual(tri, area, dphi, u, H):
    G = element_gradients(tri, dphi, u)
    W = np.sqrt(1.0 + np.einsum("td,td->t", G, G))
    uc = u[tri].mean(axis=1)
    flux = np.einsum("td,tkd->tk", G, dphi) * (area / W)[:, None]
    source = (area / 3.0) * (2.0 / uc) * (1.0 / W - H)
    local = flux - source[:, None]
    return np.bincount(tri.ravel(), weights=local.ravel(), minlength=len(u))


def jacobian_values(tri, area, dphi, u, H, principal=True, first=True, zeroth=True):
    """Local element matrices ``dF_i/du_j`` flattened to shape ``(M, 9)``."""
    G = element_gradients(tri, dphi, u)
    W = np.sqrt(1.0 + np.einsum("td,td->t", G, G))
    uc = u[tri].mean(axis=1)
    gd = np.einsum("td,tkd->tk", G, dphi)
    K = np.zeros((len(tri), 3, 3))
    if principal:
        K += (np.einsum("tid,tjd->tij", dphi, dphi) / W[:, None, None]
              - gd[:, :, None] * gd[:, None, :] / (W ** 3)[:, None, None])
    if first:
        K += ((2.0 / (3.0 * uc * W ** 3))[:, None] * gd)[:, None, :]
    if zeroth:
        K += (2.0 / (9.0 * uc * uc) * (1.0 / W - H))[:, None, None]
    K *= area[:, None, None]
    return K.reshape(len(tri), 9)
