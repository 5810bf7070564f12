import unittest
import tempfile
import os
import shutil
import logging
import sys
from pathlib import Path
sys.path.insert(0, str(Path(__file__).parent.parent))
from spmvtune.logging_config import (setup_logging, get_logger, log_performance_metrics,
                                     log_system_info)

class TestLoggingSetup(unittest.TestCase):
    """Test logging handlers and helpers."""
    def setUp(self):
        self.temp_dir = tempfile.mkdtemp()
    def tearDown(self):
        root = logging.getLogger()
        for handler in list(root.handlers):
            handler.close()
        root.handlers.clear()
        shutil.rmtree(self.temp_dir)
    def test_console_only(self):
        root = setup_logging("WARNING")
        self.assertEqual(root.level, logging.WARNING)
        self.assertEqual(len(root.handlers), 1)
    def test_verbose_forces_debug(self):
        root = setup_logging("ERROR", verbose=True)
        self.assertEqual(root.level, logging.DEBUG)
    def test_file_logging(self):
        log_file = os.path.join(self.temp_dir, "logs", "spmvtune.log")
        root = setup_logging(logging.INFO, log_file=log_file)
        self.assertEqual(len(root.handlers), 2)
        logging.getLogger("spmvtune.test").info("hello file")
        for handler in root.handlers:
            handler.flush()
        with open(log_file, 'r', encoding='utf-8') as f:
            self.assertIn("hello file", f.read())
    def test_context_logger(self):
        tlog = get_logger("spmvtune.test", matrix="m1", point="format=csr")
        self.assertEqual(tlog.process("msg", {}), ("msg | matrix=m1 | point=format=csr", {}))
        with self.assertLogs("spmvtune.test", level="INFO") as logs:
            tlog.info("swept %d points", 4)
        self.assertEqual(logs.records[0].getMessage(), "swept 4 points | matrix=m1 | point=format=csr")
        self.assertEqual(get_logger("spmvtune.test").process("msg", {})[0], "msg")
    def test_log_system_info(self):
        with self.assertLogs("spmvtune.logging_config", level="INFO") as logs:
            log_system_info()
        self.assertTrue(any("System Information" in line for line in logs.output))
    def test_performance_decorator(self):
        @log_performance_metrics
        def double(x):
            return 2 * x
        @log_performance_metrics
        def broken():
            raise RuntimeError("boom")
        self.assertEqual(double(4), 8)
        with self.assertLogs(level="ERROR") as logs:
            with self.assertRaises(RuntimeError):
                broken()
        self.assertIn("broken failed", logs.output[0])

if __name__ == '__main__':
    unittest.main()
