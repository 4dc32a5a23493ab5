from multiprocessing.pool import ThreadPool
import logging
import json
import os
import re

from .errors import ConfigError


THREADS_ENV = 'CURVEDRT_THREADS'

_MARKERS = {
    logging.DEBUG: '[-]',
    logging.INFO: '[*]',
    logging.WARNING: '[!]',
    logging.ERROR: '[!!]',
    logging.CRITICAL: '[!!]',
}


class BracketFormatter(logging.Formatter):
    """ Prefix records with the bracket markers used in console progress """

    def format(self, record):
        marker = _MARKERS.get(record.levelno, '[?]')
        return '{} {}'.format(marker, record.getMessage())


def setup_logging(verbose=False, stream=None):
    root = logging.getLogger('curvedrt')
    # re-entrant: cli.main may be called several times in one process
    for handler in list(root.handlers):
        root.removeHandler(handler)
    handler = logging.StreamHandler(stream)
    handler.setFormatter(BracketFormatter())
    root.addHandler(handler)
    root.setLevel(logging.DEBUG if verbose else logging.INFO)
    return root


def num_threads():
    val = os.environ.get(THREADS_ENV)
    if val is None or val.strip() == '':
        return 1
    try:
        n = int(val)
    except ValueError:
        raise ConfigError('{} must be an integer, got {}'.format(THREADS_ENV,
                                                                  val))
    return max(n, 1)


def element_map(fn, items, threads=None):
    """ Ordered map over element indices.

        Results come back in input order, so scattering them afterwards
        gives bit-identical matrices whatever the thread count.
    """
    items = list(items)
    if threads is None:
        threads = num_threads()
    if threads <= 1 or len(items) < 2:
        return [fn(it) for it in items]
    with ThreadPool(threads) as pool:
        return pool.map(fn, items)


def parse_levels(text):
    """ Parse '2..5', '2,3,4' or a list into a sorted list of ints """
    if isinstance(text, (list, tuple)):
        vals = [int(v) for v in text]
    else:
        text = str(text).strip()
        m = re.match(r'^(-?\d+)\.\.(-?\d+)$', text)
        if m is not None:
            lo, hi = int(m.group(1)), int(m.group(2))
            if hi < lo:
                raise ConfigError('Empty level range: {}'.format(text))
            vals = list(range(lo, hi + 1))
        else:
            try:
                vals = [int(v) for v in text.split(',') if v.strip() != '']
            except ValueError:
                raise ConfigError('Unrecognized levels: {}'.format(text))
    if len(vals) == 0:
        raise ConfigError('No levels given')
    return sorted(set(vals))


def save_opts(opts, save_path, fname='run.opts'):
    if not os.path.exists(save_path):
        os.makedirs(save_path)
    with open(os.path.join(save_path, fname), 'w') as cfg_f:
        cfg_f.write(json.dumps(opts, indent=2, sort_keys=True))
