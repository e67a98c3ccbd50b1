import logging
from datetime import datetime
from typing import Dict, List, Any, Optional

from colorama import Fore, Style

from core.config import DEFAULT_LOG_FILE, LOG_FORMAT, LOG_LEVEL, MAX_LOG_ENTRIES


class RunLogger:
    """Logs pipeline steps (simulate, estimate, decompose, ...)"""

    def __init__(self, log_file: Optional[str] = DEFAULT_LOG_FILE):
        self.logger = logging.getLogger("lindblad_fit")
        self.step_log: List[Dict[str, Any]] = []

        # Configure logging only once
        if not self.logger.handlers:
            self._setup_logging(log_file)

    def _setup_logging(self, log_file: Optional[str]):
        self.logger.setLevel(LOG_LEVEL)
        formatter = logging.Formatter(LOG_FORMAT)

        if log_file:
            try:
                file_handler = logging.FileHandler(log_file)
            except OSError:
                file_handler = None
            if file_handler is not None:
                file_handler.setFormatter(formatter)
                self.logger.addHandler(file_handler)

        # Console: errors only
        console_handler = logging.StreamHandler()
        console_handler.setLevel(logging.ERROR)
        console_handler.setFormatter(formatter)
        self.logger.addHandler(console_handler)

    def _append(self, record: Dict[str, Any]):
        self.step_log.append(record)
        if len(self.step_log) > MAX_LOG_ENTRIES:
            del self.step_log[: len(self.step_log) - MAX_LOG_ENTRIES]

    def log_step(self, step: str, params: Dict[str, Any], summary: str = "",
                 success: bool = True, error: Optional[Exception] = None):
        """Record a pipeline step"""
        record = {
            "timestamp": datetime.now().isoformat(),
            "type": "step",
            "step": step,
            "params": params,
            "success": success,
            "summary": summary[:500],
            "error": str(error) if error else None,
        }
        self._append(record)

        log_msg = f"[{step}] {params} -> {'OK' if success else 'ERROR'}"
        if success:
            self.logger.info(f"{log_msg} {summary}")
        else:
            self.logger.error(f"{log_msg}: {error}")

    def log_warning(self, message: str, step: str = "warning"):
        record = {
            "timestamp": datetime.now().isoformat(),
            "type": "warning",
            "step": step,
            "params": {},
            "success": True,
            "summary": message,
            "error": None,
        }
        self._append(record)
        self.logger.warning(message)

    def warnings(self) -> List[str]:
        return [r["summary"] for r in self.step_log if r["type"] == "warning"]

    def get_session_summary(self) -> Dict[str, Any]:
        steps = [r for r in self.step_log if r["type"] == "step"]
        failed = [r for r in steps if not r["success"]]
        return {
            "total_records": len(self.step_log),
            "steps": {
                "total": len(steps),
                "successful": len(steps) - len(failed),
                "failed": len(failed),
            },
            "warnings": len(self.warnings()),
        }

    def print_step_log(self, limit: int = 10):
        """Print the most recent steps"""
        print("\n" + "=" * 60)
        print(f"{Fore.CYAN}RUN LOG{Style.RESET_ALL}")
        print("=" * 60)
        for record in self.step_log[-limit:]:
            timestamp = record["timestamp"].split("T")[1].split(".")[0]
            if record["type"] == "warning":
                print(f"{Fore.YELLOW}! [{timestamp}] {record['summary']}{Style.RESET_ALL}")
            elif record["success"]:
                print(f"{Fore.GREEN}+ [{timestamp}] {record['step']}{Style.RESET_ALL} {record['summary']}")
            else:
                print(f"{Fore.RED}x [{timestamp}] {record['step']}: {record['error']}{Style.RESET_ALL}")

        summary = self.get_session_summary()
        print(f"Steps: {summary['steps']['successful']}/{summary['steps']['total']} successful, "
              f"{summary['warnings']} warning(s)")
        print("=" * 60)

    def clear_log(self):
        self.step_log.clear()
        self.logger.debug("Step log cleared")


# Global logger instance
run_logger = RunLogger()
