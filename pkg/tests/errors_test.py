from tests import LimitedTestCase, main
from topkrange import errors


class TestErrors(LimitedTestCase):
    def test_usage_hierarchy(self):
        for cls in (errors.UnknownBlockError, errors.RangeError, errors.DuplicateKeyError,
                    errors.MissingKeyError, errors.CapacityError, errors.PreconditionError):
            self.assertTrue(issubclass(cls, errors.UsageError), cls)
            self.assertTrue(issubclass(cls, errors.TopkError), cls)

    def test_config_errors_carry_line(self):
        e = errors.ConfigError("bad", 3)
        self.assertEqual(str(e), 'line 3: bad')
        self.assertEqual(e.lineno, 3)
        self.assertTrue(issubclass(errors.BitBudgetError, errors.ConfigError))
        self.assertEqual(str(errors.WorkloadError("empty range", 7)), 'line 7: empty range')

    def test_key_errors(self):
        e = errors.DuplicateKeyError(2.5)
        self.assertEqual(e.key, 2.5)
        self.assertTrue('2.5' in str(e))
        self.assertEqual(errors.UnknownBlockError(9).block_id, 9)

    def test_audit_report(self):
        ok = errors.AuditReport.passed()
        bad = errors.AuditReport.failed("pilot overflow")
        self.assertTrue(ok)
        self.assertFalse(bad)
        self.assertEqual(bad.violation, "pilot overflow")


if __name__ == '__main__':
    main()
