import os
import threading

from topkrange.disk import EmConfig
from topkrange.errors import ConfigError

__all__ = ['use_config', 'get_config', 'load_config', 'parse_config',
           'DEFAULTS']

_threadlocal = threading.local()

DEFAULTS = dict(B=16, M=4096, word_bits=64, seed=0)

_KEYS = {'b': 'B', 'm': 'M', 'word_bits': 'word_bits', 'seed': 'seed'}


def parse_config(lines):
    """Parse ``key=value`` lines into an :class:`EmConfig`.  Blank lines and
    ``#`` comments are skipped; unknown keys and malformed values are a
    :class:`ConfigError` naming the line."""
    fields = dict(DEFAULTS)
    for lineno, line in enumerate(lines, 1):
        line = line.split('#', 1)[0].strip()
        if not line:
            continue
        if '=' not in line:
            raise ConfigError("expected key=value, got %r" % line, lineno)
        key, value = [part.strip() for part in line.split('=', 1)]
        name = _KEYS.get(key.lower())
        if name is None:
            raise ConfigError("unknown key %r" % key, lineno)
        try:
            fields[name] = int(value, 0)
        except ValueError:
            raise ConfigError("%s needs an integer, got %r" % (key, value), lineno)
    return EmConfig(**fields)


def load_config(path):
    with open(path) as f:
        return parse_config(f)


def use_config(cfg=None):
    """Make *cfg* the current configuration of this thread.

    *cfg* can be an :class:`EmConfig`, a path to a ``key=value`` file, or
    None.  If None, the file named by the ``TOPKRANGE_CONFIG`` environment
    variable is used, and failing that the defaults.  Only call use_config
    before building structures; existing disks keep the parameters they
    were created with.
    """
    if cfg is None:
        cfg = os.environ.get('TOPKRANGE_CONFIG', None)
    if cfg is None:
        cfg = EmConfig(**DEFAULTS)
    if isinstance(cfg, str):
        assert cfg.strip(), "Need to specify a config file"
        cfg = load_config(cfg)
    _threadlocal.config = cfg
    return cfg


def get_config():
    """Get the configuration of the current thread, selecting one on first
    use."""
    try:
        return _threadlocal.config
    except AttributeError:
        return use_config()
