import pathlib

from .errors import CheckFailed


__all__ = ("Check", "check", "path_exists")


class Check:
    """
    Wraps a command callback; the Command unwraps the chain and runs every
    predicate on the bound arguments before the callback
    """

    def __init__(self, next, predicate, message="check failed"):
        self.next = next
        self.predicate = predicate
        self.message = message

    def run(self, ctx, arguments):
        result = self.predicate(ctx, arguments)
        if result is True:
            return

        raise CheckFailed(self, result if isinstance(result, str) else self.message)


def check(predicate, message="check failed"):
    def _predicate(callback):
        return Check(callback, predicate, message)

    return _predicate


def path_exists(*names):
    """
    Fails unless every named argument that is set points to an existing path
    """

    def _predicate(ctx, arguments):
        for name in names:
            value = arguments.get(name)
            if value in (None, ""):
                continue

            if not pathlib.Path(value).exists():
                return f"{name.replace('_', '-')}: {value} does not exist"

        return True

    return check(_predicate)
