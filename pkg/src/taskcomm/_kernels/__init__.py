"""Hot-kernel backend selection.

Imports the compiled Cython core when available, otherwise the numpy
fallback. ``TASKCOMM_FORCE_FALLBACK=1`` forces the fallback (used by the
benchmark and the backend-parity tests). ``BACKEND`` names the active one.
"""

import os

if os.environ.get("TASKCOMM_FORCE_FALLBACK", "") not in ("", "0"):
    from taskcomm._kernels import fallback as _impl

    BACKEND = "fallback"
else:
    try:
        from taskcomm._kernels import _core as _impl  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        from taskcomm._kernels import fallback as _impl

        BACKEND = "fallback"

im2col = _impl.im2col
col2im = _impl.col2im
lstm_pointwise_forward = _impl.lstm_pointwise_forward
lstm_pointwise_backward = _impl.lstm_pointwise_backward
adam_update = _impl.adam_update
nearest_codewords = _impl.nearest_codewords
draw_line = _impl.draw_line
