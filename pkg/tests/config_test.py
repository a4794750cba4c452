import os
import tempfile

from tests import LimitedTestCase, data_path, main
from topkrange import config
from topkrange.disk import EmConfig
from topkrange.errors import ConfigError


class TestParseConfig(LimitedTestCase):
    def test_defaults(self):
        self.assertEqual(config.parse_config([]), EmConfig(**config.DEFAULTS))

    def test_values(self):
        cfg = config.parse_config(['# machine', 'B = 32', 'M=0x1000', '', 'word_bits=64 # full',
                                   'seed=9'])
        self.assertEqual(cfg, EmConfig(B=32, M=4096, word_bits=64, seed=9))

    def test_keys_are_case_insensitive(self):
        self.assertEqual(config.parse_config(['b=8']).B, 8)

    def test_unknown_key(self):
        try:
            config.parse_config(['B=8', 'blocks=3'])
        except ConfigError as e:
            self.assertEqual(e.lineno, 2)
            self.assertTrue('blocks' in str(e))
        else:
            self.fail("expected a ConfigError")

    def test_bad_value(self):
        self.assertRaises(ConfigError, config.parse_config, ['B=lots'])

    def test_missing_equals(self):
        self.assertRaises(ConfigError, config.parse_config, ['B 8'])

    def test_validation_runs(self):
        self.assertRaises(ConfigError, config.parse_config, ['B=16', 'M=16'])


class TestUseConfig(LimitedTestCase):
    def test_explicit(self):
        cfg = EmConfig(B=8, M=512)
        config.use_config(cfg)
        self.assertTrue(config.get_config() is cfg)

    def test_file(self):
        cfg = config.use_config(data_path('em.cfg'))
        self.assertEqual(cfg.B, 8)
        self.assertEqual(config.get_config(), cfg)

    def test_environment(self):
        fd, path = tempfile.mkstemp(suffix='.cfg')
        os.write(fd, b'B=4\nM=64\n')
        os.close(fd)
        old = os.environ.get('TOPKRANGE_CONFIG')
        os.environ['TOPKRANGE_CONFIG'] = path
        try:
            self.assertEqual(config.use_config().B, 4)
        finally:
            if old is None:
                del os.environ['TOPKRANGE_CONFIG']
            else:
                os.environ['TOPKRANGE_CONFIG'] = old
            os.remove(path)

    def test_defaults_without_environment(self):
        old = os.environ.pop('TOPKRANGE_CONFIG', None)
        try:
            self.assertEqual(config.use_config(), EmConfig())
        finally:
            if old is not None:
                os.environ['TOPKRANGE_CONFIG'] = old


if __name__ == '__main__':
    main()
