"""Hot numeric kernels with a numba backend and a pure-numpy fallback.

Backend selection, once at import:

* ``ADHOCSIM_NUMBA=0`` (or ``false``/``no``) forces the numpy backend;
* otherwise numba is used when importable, numpy when not.

``BACKEND`` names the active one. Both backends expose identical array
signatures; ``benchmarks/bench_kernels.py`` compares their throughput.
"""

import os

_flag = os.environ.get("ADHOCSIM_NUMBA", "1").strip().lower()
_want_numba = _flag not in ("0", "false", "no", "off")

if _want_numba:
    try:
        from . import numba_impl as _impl

        BACKEND = "numba"
    except ImportError:
        from . import numpy_impl as _impl

        BACKEND = "numpy"
else:
    from . import numpy_impl as _impl

    BACKEND = "numpy"

j0 = _impl.j0
i0e = _impl.i0e
gaussian_q = _impl.gaussian_q
marcum_q1 = _impl.marcum_q1
ber_dbpsk = _impl.ber_dbpsk
ber_dqpsk = _impl.ber_dqpsk
cck_bit_error = _impl.cck_bit_error
packet_success = _impl.packet_success
fading_sample = _impl.fading_sample

if BACKEND == "numba":
    fading_sample_scalar = _impl.fading_sample_scalar
else:

    def fading_sample_scalar(t, freq_i, phase_i, freq_q, phase_q, amp):
        import numpy as np

        re = np.cos(freq_i * t + phase_i).sum()
        im = np.cos(freq_q * t + phase_q).sum()
        return complex(amp * re, amp * im)


__all__ = [
    "BACKEND",
    "j0",
    "i0e",
    "gaussian_q",
    "marcum_q1",
    "ber_dbpsk",
    "ber_dqpsk",
    "cck_bit_error",
    "packet_success",
    "fading_sample",
    "fading_sample_scalar",
]
