__all__ = (
    "CommandError",
    "UsageError",
    "UnknownCommand",
    "UnknownOption",
    "NotEnoughArguments",
    "TooManyArguments",
    "ConverterFailed",
    "CheckFailed",
)


class CommandError(Exception):
    pass


class UsageError(CommandError):
    pass


class UnknownCommand(UsageError):
    def __init__(self, parts):
        self.parts = parts
        super().__init__(f"unknown command {' '.join(parts)!r}" if parts else "no command given")


class UnknownOption(UsageError):
    def __init__(self, command, option):
        self.command = command
        self.option = option
        super().__init__(f"{command.full_name}: unknown option {option}")


class NotEnoughArguments(UsageError):
    def __init__(self, parameter):
        self.parameter = parameter
        super().__init__(f"missing argument {parameter.display_name}")


class TooManyArguments(UsageError):
    def __init__(self, command, extra):
        self.command = command
        self.extra = extra
        super().__init__(f"{command.full_name}: unexpected arguments {' '.join(extra)}")


class ConverterFailed(UsageError):
    def __init__(self, parameter, value, error):
        self.parameter = parameter
        self.value = value
        self.error = error
        super().__init__(f"invalid value {value!r} for {parameter.display_name}: {error}")


class CheckFailed(CommandError):
    def __init__(self, check, message):
        self.check = check
        super().__init__(message)
