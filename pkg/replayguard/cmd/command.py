import inspect

from abc import ABC

from .check import Check
from .converter import Converter
from .errors import *


__all__ = ("CommandTable", "CommandParameter", "Command")


class CommandTable(ABC):
    def __init__(self, *commands, parent_checks=True):
        self.parent = None  # Gets filled later
        self._checks = []
        self.commands = list(commands)
        self.parent_checks = parent_checks

    @property
    def checks(self):
        if self.parent is not None and self.parent_checks:
            yield from self.parent.checks

        yield from self._checks

    @property
    def full_name(self):
        return ""

    def add_check(self, check):
        self._checks.append(check)

    def command(self, *args, **kwargs):
        def _predicate(callback):
            cmd = Command(callback, *args, **kwargs)
            cmd.parent = self
            self.commands.append(cmd)
            return cmd

        return _predicate

    def filter_commands(self, parts):
        if len(parts) == 0:
            return []

        for command in self.commands:
            if command.name == parts[0] or parts[0] in command.aliases:
                yield command

    def find_command(self, parts):
        for cmd in self.filter_commands(parts):
            return cmd.find_command(parts[1:])

        return parts, self


class CommandParameter:
    def __init__(self, name, kind, default=inspect.Parameter.empty, converter=None):
        self.name = name
        self.kind = kind
        self.default = default
        if self.default is inspect.Parameter.empty and self.kind == inspect.Parameter.VAR_POSITIONAL:
            self.default = tuple()

        self.converter = converter
        # keyword-only bools are switches that take no value
        self.switch = converter is bool and kind == inspect.Parameter.KEYWORD_ONLY
        if self.switch and self.default is inspect.Parameter.empty:
            self.default = False

    @classmethod
    def from_parameter(cls, p):
        return cls(
            p.name,
            p.kind,
            p.default,
            p.annotation if p.annotation != inspect.Parameter.empty else None,
        )

    @property
    def flag(self):
        return "--" + self.name.replace("_", "-")

    @property
    def is_option(self):
        return self.kind == inspect.Parameter.KEYWORD_ONLY

    @property
    def required(self):
        return self.default is inspect.Parameter.empty

    @property
    def display_name(self):
        if self.is_option:
            return self.flag

        return self.name.upper()

    @property
    def usage(self):
        if self.switch:
            return f"[{self.flag}]"

        if self.is_option:
            text = f"{self.flag} {self.name.upper()}"
            return text if self.required else f"[{text}]"

        if self.kind == inspect.Parameter.VAR_POSITIONAL:
            return f"[{self.name.upper()}...]"

        return self.name.upper() if self.required else f"[{self.name.upper()}]"

    def convert(self, arg):
        converter = self.converter or str
        if inspect.isclass(converter) and issubclass(converter, Converter):
            return converter.convert(self, arg)

        try:
            return converter(arg)
        except Exception as e:
            raise ConverterFailed(self, arg, str(e))


class Command(CommandTable):
    def __init__(
        self,
        callback,
        name=None,
        description=None,
        aliases=None,
        hidden=None,
        *args,
        **kwargs,
    ):
        CommandTable.__init__(self, *args, **kwargs)

        self.module = None  # Gets filled later if this command belongs to a module

        cb = callback
        while isinstance(cb, Check):
            self.add_check(cb)
            cb = cb.next

        self.callback = cb
        self.name = name or self.callback.__name__.replace("_", "-")

        doc = inspect.getdoc(self.callback)
        self.description = description or (inspect.cleandoc(doc) if doc else "")
        self.aliases = aliases or []
        self.hidden = hidden

        sig = inspect.signature(self.callback)
        self.parameters = [
            CommandParameter.from_parameter(p)
            for _, p in list(sig.parameters.items())
            if p.name not in ("self", "ctx")  # Skip self and ctx
        ]
        self._options = {
            p.flag[2:]: p for p in self.parameters if p.is_option
        }

    @property
    def brief(self):
        lines = self.description.splitlines()
        if len(lines) == 0:
            return ""

        line = lines[0]
        if len(line) > 60:
            line = f"{line[:60]}..."

        return line

    @property
    def full_name(self):
        if self.parent is None:
            return self.name

        else:
            return f"{self.parent.full_name} {self.name}".strip()

    @property
    def usage(self):
        return " ".join([self.full_name] + [p.usage for p in self.parameters])

    def find_command(self, parts):
        for cmd in self.filter_commands(parts):
            return cmd.find_command(parts[1:])

        return parts, self

    def fill_module(self, module):
        self.module = module
        for cmd in self.commands:
            cmd.fill_module(module)

    def _split_options(self, parts):
        positional = []
        options = {}
        parts = list(parts)
        while parts:
            part = parts.pop(0)
            if part == "--":
                positional.extend(parts)
                break

            if not part.startswith("--") or len(part) == 2:
                positional.append(part)
                continue

            name, sep, value = part[2:].partition("=")
            parameter = self._options.get(name)
            if parameter is None:
                raise UnknownOption(self, part)

            if parameter.switch:
                if sep:
                    raise ConverterFailed(parameter, value, "switches take no value")

                options[parameter.name] = True
                continue

            if not sep:
                if not parts:
                    raise NotEnoughArguments(parameter)

                value = parts.pop(0)

            options[parameter.name] = parameter.convert(value)

        return positional, options

    def parse(self, parts):
        """
        (positional args, keyword args, all arguments by name) for argv parts
        """
        positional, kwargs = self._split_options(parts)
        args = []
        bound = {}

        for parameter in self.parameters:
            if parameter.is_option:
                if parameter.name not in kwargs:
                    if parameter.required:
                        raise NotEnoughArguments(parameter)

                    kwargs[parameter.name] = parameter.default

                bound[parameter.name] = kwargs[parameter.name]

            elif parameter.kind == inspect.Parameter.VAR_POSITIONAL:
                values = tuple(parameter.convert(arg) for arg in positional)
                positional = []
                args.extend(values)
                bound[parameter.name] = values

            elif parameter.kind == inspect.Parameter.VAR_KEYWORD:
                continue

            elif positional:
                value = parameter.convert(positional.pop(0))
                args.append(value)
                bound[parameter.name] = value

            elif parameter.required:
                raise NotEnoughArguments(parameter)

            else:
                args.append(parameter.default)
                bound[parameter.name] = parameter.default

        if positional:
            raise TooManyArguments(self, positional)

        return args, kwargs, bound

    def execute(self, ctx, parts):
        ctx.last_cmd = self
        args, kwargs, bound = self.parse(parts)

        for check in self.checks:
            check.run(ctx, bound)

        if self.module is None:
            return self.callback(ctx, *args, **kwargs)

        return self.callback(self.module, ctx, *args, **kwargs)
