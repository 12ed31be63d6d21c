import inspect
import logging
import sys

from ..errors import ReplayGuardError
from .command import Command, CommandTable
from .context import Context
from .errors import *


__all__ = ("LOG_FORMAT", "App")

log = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


class App(CommandTable):
    """
    Dispatches argv to the commands of the added modules

    run() returns the process exit code: 0 on success, 1 when a command
    fails, 2 on usage errors.
    """

    def __init__(self, prog="replayguard", out=None, err=None):
        CommandTable.__init__(self)
        self.prog = prog
        self.out = out or sys.stdout
        self.err = err or sys.stderr
        self.modules = []
        self.quiet = False
        self.verbose = False

    def add_module(self, module):
        if inspect.isclass(module):
            module = module(self)

        self.modules.append(module)
        for cmd in module.commands:
            cmd.fill_module(module)
            self.commands.append(cmd)

    def configure_logging(self):
        level = logging.INFO
        if self.verbose:
            level = logging.DEBUG

        elif self.quiet:
            level = logging.WARNING

        logging.basicConfig(level=level, format=LOG_FORMAT, stream=self.err)
        logging.getLogger().setLevel(level)

    def help_text(self):
        lines = [f"usage: {self.prog} [--verbose | --quiet] COMMAND [ARGS]", "", "commands:"]
        for cmd in sorted(self.commands, key=lambda c: c.name):
            if cmd.hidden:
                continue

            lines.append(f"  {cmd.name:<12}{cmd.brief}")
            for sub in cmd.commands:
                lines.append(f"  {sub.full_name:<12}{sub.brief}")

        return "\n".join(lines)

    def command_help(self, cmd):
        lines = [f"usage: {self.prog} {cmd.usage}"]
        if cmd.description:
            lines += ["", cmd.description]

        return "\n".join(lines)

    def fail(self, message):
        self.err.write(f"{self.prog}: error: {message}\n")

    def _global_options(self, argv):
        while argv and argv[0].startswith("-"):
            option = argv.pop(0)
            if option in ("-v", "--verbose"):
                self.verbose = True

            elif option in ("-q", "--quiet"):
                self.quiet = True

            elif option in ("-h", "--help"):
                argv[:] = ["help"]
                return

            else:
                raise UsageError(f"unknown option {option}")

    def run(self, argv=None):
        argv = list(sys.argv[1:] if argv is None else argv)
        try:
            self._global_options(argv)
        except UsageError as e:
            self.fail(str(e))
            return 2

        if not argv or argv[0] == "help":
            self.out.write(self.help_text() + "\n")
            return 0 if argv else 2

        remaining, cmd = self.find_command(argv)
        if not isinstance(cmd, Command):
            self.fail(str(UnknownCommand(argv[:1])))
            return 2

        if "--help" in remaining or "-h" in remaining:
            self.out.write(self.command_help(cmd) + "\n")
            return 0

        self.configure_logging()
        ctx = Context(self, argv, self.out)
        try:
            result = cmd.execute(ctx, remaining)
        except UsageError as e:
            self.fail(str(e))
            self.err.write(f"usage: {self.prog} {cmd.usage}\n")
            return 2

        except (CommandError, ReplayGuardError, OSError, ValueError) as e:
            log.debug("%s failed", cmd.full_name, exc_info=True)
            self.fail(str(e))
            return 1

        return int(result or 0)
