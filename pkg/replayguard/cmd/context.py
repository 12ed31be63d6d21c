import sys


__all__ = ("Context",)


class Context:
    def __init__(self, app, argv, out=None):
        self.app = app
        self.argv = argv
        self.out = out or sys.stdout
        self.last_cmd = None

    @property
    def quiet(self):
        return self.app.quiet

    def echo(self, text=""):
        self.out.write(f"{text}\n")
