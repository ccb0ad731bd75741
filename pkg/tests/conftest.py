import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from mmhate.signal_io import AudioSignal


@pytest.fixture
def tone():
    def make(freq_hz=440.0, seconds=1.0, sample_rate=44100, amplitude=1.0, clip_id="tone"):
        t = np.arange(int(seconds * sample_rate)) / sample_rate
        return AudioSignal(amplitude * np.sin(2 * np.pi * freq_hz * t), sample_rate, clip_id)

    return make
