"""Shared numerical constants for both kernel backends.

Rational approximations for J0 follow the Cephes library (Moshier 1989);
accuracy ~4e-16 peak absolute error on [0, 30].
"""

import numpy as np

SQ2OPI = 7.9788456080286535587989e-1  # sqrt(2/pi)
PIO4 = 7.85398163397448309616e-1  # pi/4

# J0 on [0, 5]: (w - DR1)(w - DR2) * polevl(w, RP) / p1evl(w, RQ), w = x^2
J0_DR1 = 5.78318596294678452118e0
J0_DR2 = 3.04712623436620863991e1

J0_RP = np.array(
    [
        -4.79443220978201773821e9,
        1.95617491946556577543e12,
        -2.49248344360967716204e14,
        9.70862251047306323952e15,
    ]
)
# implicit leading coefficient 1.0 (p1evl form)
J0_RQ = np.array(
    [
        4.99563147152651017219e2,
        1.73785401676374683123e5,
        4.84409658339962045305e7,
        1.11855537045356834862e10,
        2.11277520115489217587e12,
        3.10518229857422583814e14,
        3.18121955943204943306e16,
        1.71086294081043136091e18,
    ]
)

# J0 on (5, inf): Hankel expansion with rational P, Q in 25/x^2
J0_PP = np.array(
    [
        7.96936729297347051624e-4,
        8.28352392107440799803e-2,
        1.23953371646414299388e0,
        5.44725003058768775090e0,
        8.74716500199817011941e0,
        5.30324038235394892183e0,
        9.99999999999999997821e-1,
    ]
)
J0_PQ = np.array(
    [
        9.24408810558863637013e-4,
        8.56288474354474431428e-2,
        1.25352743901058953537e0,
        5.47097740330417105182e0,
        8.76190883237069594232e0,
        5.30605288235394617618e0,
        1.00000000000000000218e0,
    ]
)
J0_QP = np.array(
    [
        -1.13663838898469149931e-2,
        -1.28252718670509318512e0,
        -1.95539544257735972385e1,
        -9.32060152123768231369e1,
        -1.77681167980488050595e2,
        -1.47077505154951170175e2,
        -5.14105326766599330220e1,
        -6.05014350600728481186e0,
    ]
)
# implicit leading coefficient 1.0 (p1evl form)
J0_QQ = np.array(
    [
        6.43178256118178023184e1,
        8.56430025976980587198e2,
        3.88240183605401609683e3,
        7.24046774195652478189e3,
        5.93072701187316984827e3,
        2.06209331660327847417e3,
        2.42005740240291393179e2,
    ]
)

# Scaled I0: power series below I0E_SWITCH, Hankel-type asymptotic above.
# The switch sits where the asymptotic tail (~e^{-2x}) is far below 1 ulp.
I0E_SWITCH = 20.0
I0E_SERIES_TERMS = 48
I0E_ASYMPT_TERMS = 14

# Gauss-Legendre rule used by the Marcum Q panel integration. 18 nodes on
# panels <= 20/3 wide hold the unit-scale Gaussian integrand to ~1e-14.
GL_NODES, GL_WEIGHTS = np.polynomial.legendre.leggauss(18)
MARCUM_PANEL_WIDTH = 20.0 / 3.0
MARCUM_TAIL = 40.0  # Gaussian cutoff: exp(-40^2/2) underflows to 0
