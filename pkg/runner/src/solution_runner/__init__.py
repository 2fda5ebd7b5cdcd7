from .run import main, run_program, stringify_value

__all__ = ["main", "run_program", "stringify_value"]
