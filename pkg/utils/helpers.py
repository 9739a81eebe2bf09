"""
Small helpers for the Sentinel simulator
Config value parsing, atomic file writes and random stream derivation
"""
import os
import tempfile

import numpy as np

_TRUE = {'1', 'true', 'yes', 'on', 'y'}
_FALSE = {'0', 'false', 'no', 'off', 'n'}


def parse_bool(raw):
    value = str(raw).strip().lower()
    if value in _TRUE:
        return True
    if value in _FALSE:
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def parse_int_list(raw):
    """'2000, 400,200' -> [2000, 400, 200]"""
    if not str(raw).strip():
        return []
    return [int(part) for part in str(raw).split(',') if part.strip()]


def parse_delays(raw):
    """'0:12.5,3:20000' -> {0: 12.5, 3: 20000.0}"""
    delays = {}
    for part in str(raw).split(','):
        if not part.strip():
            continue
        client, seconds = part.split(':')
        delays[int(client)] = float(seconds)
    return delays


def format_delays(delays):
    return ','.join(f"{client}:{seconds!r}" for client, seconds in sorted(delays.items()))


def atomic_write_text(path, text):
    """Write to a temporary file in the target directory, then rename over the target"""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix='.tmp-', dir=directory)
    try:
        with os.fdopen(fd, 'w', encoding='utf-8', newline='') as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise


def spawn_rngs(seed, count):
    """Independent generators derived from one seed; stable for a given (seed, count)"""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(count)]


def resolve_dtype(name):
    return {'float64': np.float64, 'float32': np.float32}[name]
