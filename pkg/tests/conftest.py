import json

import pytest

from subfuse import _pykernels, kernels

try:
    from subfuse import _ckernels
except ImportError:  # extension not built
    _ckernels = None

BACKENDS = {"python": _pykernels}
if _ckernels is not None:
    BACKENDS["cython"] = _ckernels


@pytest.fixture(params=sorted(BACKENDS))
def backend(request, monkeypatch):
    """Run the test once per available kernel backend."""
    impl = BACKENDS[request.param]
    for name in ("edit_distance", "lcs_length", "best_window", "hungarian"):
        monkeypatch.setattr(kernels, name, getattr(impl, name))
    return request.param


def ocr_doc(frames, video_id="v", width=None, height=None):
    """frames: list of lists of (box, text, conf); frame i is at 40*i ms."""
    doc = {"video_id": video_id, "frames": []}
    if width is not None:
        doc["frame_width"], doc["frame_height"] = width, height
    for i, dets in enumerate(frames):
        doc["frames"].append({
            "frame_index": i, "time_ms": 40 * i,
            "detections": [
                {"quad": [[x0, y0], [x1, y0], [x1, y1], [x0, y1]], "text": t, "conf": c}
                for (x0, y0, x1, y1), t, c in dets
            ],
        })
    return json.dumps(doc, ensure_ascii=False).encode("utf-8")
