import re
import time
import contextlib

from tqdm import tqdm


def items_with_progress(items, desc, enabled=True, total=None):
    """Iterate over `items` with a progress bar on stderr."""
    return tqdm(items,
                total=len(items) if total is None else total,
                desc=desc,
                unit="run(s)",
                colour="#FF33FB",
                disable=not enabled)


def docopt_get_args(func, extra_args=None):
    """Get all CLI  args via docopt
    """
    from docopt import docopt
    docopt_opts = docopt(func.__doc__, extra_args)
    opts = {}
    for key, val in docopt_opts.items():
        key = key.strip("<>-").replace("-", "_")
        if isinstance(val, str):
            if val.lower() in ("off", "false"):
                val = False
            elif val.lower() in ("on", "true"):
                val = True
        opts[key] = val
    return opts


def parse_int_list(text):
    """Parse `"1,2,5-7"` into `[1, 2, 5, 6, 7]`.

    Ranges are inclusive. Raises `ValueError` on anything else.
    """
    values = []
    for token in str(text).split(","):
        token = token.strip()
        if not token:
            raise ValueError(f"Empty entry in integer list: {text!r}")

        match = re.match(r"^(-?\d+)-(-?\d+)$", token)
        if match:
            low, high = int(match.group(1)), int(match.group(2))
            if high < low:
                raise ValueError(f"Invalid range: {token!r}")
            values.extend(range(low, high + 1))
        else:
            values.append(int(token))

    return values


class Stopwatch:
    """Accumulates wall-clock time over several `with` blocks."""

    def __init__(self):
        self.elapsed = 0.0

    @contextlib.contextmanager
    def running(self):
        start = time.perf_counter()
        try:
            yield self
        finally:
            self.elapsed += time.perf_counter() - start


class Deadline:
    """A wall-clock limit measured from construction."""

    def __init__(self, seconds):
        self.start = time.perf_counter()
        self.seconds = float(seconds)

    @property
    def elapsed(self):
        return time.perf_counter() - self.start

    def expired(self):
        return self.elapsed >= self.seconds
