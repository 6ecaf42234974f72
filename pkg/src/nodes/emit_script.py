import logging

from pocketflow import Node

from src.errors import EncodingError
from src.utils.smtlib import count_assertions, to_smtlib2

logger = logging.getLogger("flow.traversal")


class EmitScript(Node):
    def prep(self, shared):
        return shared["script"], shared["config"].output

    def exec(self, inputs):
        script, output = inputs
        text = to_smtlib2(script)
        # Read the text back: every assertion must survive rendering
        if count_assertions(text) != len(script.assertions):
            raise EncodingError("rendered script lost assertions")
        if output:
            with open(output, "w", encoding="utf-8", newline="\n") as file:
                file.write(text)
            logger.info("Wrote %d bytes to %s", len(text.encode("utf-8")), output)
        return text

    def post(self, shared, prep_res, exec_res):
        shared["smtlib"] = exec_res
        shared["exit_code"] = 0
        if not prep_res[1]:
            print(exec_res, end="")
