"""Before/after pairs for the nine original catalog rules under the golden key."""

CORE_GOLDENS = {
    "R1-unnecessary-else": (
        "def f(a=None):\n    if a is None:\n        return 1\n    else:\n        # some code here\n        return 2\n",
        "def f(a=None):\n    if a is None:\n        return 1\n    # some code here\n    return 2\n",
    ),
    "R2-loop-to-comprehension": (
        "cubes = []\nfor i in range(20):\n    cubes.append(i**3)\n",
        "cubes = [i**3 for i in range(20)]\n",
    ),
    "R3-decoy-constructor": (
        "class A:\n\n    def __init__(self, x, y, z):\n        self.x = x\n",
        "class A:\n\n    def __init__(self, x):\n        pass\n    def __init__(self, x, y, z):\n        self.x = x\n",
    ),
    "D1-add-operand-order": (
        "def f(n):\n    a, b = 0, 1\n    for i in range(3, n + 1):\n        a, b = b, a + b\n    return b\n",
        "def f(n):\n    a, b = 0, 1\n    for i in range(3, n + 1):\n        a, b = b, b + a\n    return b\n",
    ),
    "D2-comparison-operand-order": (
        "if n <= left and n <= right:\n    return True\n",
        "if n <= left and right >= n:\n    return True\n",
    ),
    "D3-if-else-block-order": (
        "if condition:\n    x = 1\nelse:\n    x = 2\n",
        "if not condition:\n    x = 2\nelse:\n    x = 1\n",
    ),
    "F1-operator-whitespace": (
        "def calculate(a, b, c, d):\n    result=a+b-c*d\n    return result\n",
        "def calculate(a, b, c, d):\n    result = a + b - c * d\n    return result\n",
    ),
    "F2-bracket-alignment": (
        "def example_function(param1, param2,\n    param3, param4):\n    return param1 + param2 + param3 + param4\n",
        "def example_function(param1, param2,\n                     param3, param4):\n    return param1 + param2 + param3 + param4\n",
    ),
    "F3-top-level-blank-lines": (
        "def a():\n    pass\ndef b():\n    pass\n",
        "def a():\n    pass\n\n\ndef b():\n    pass\n",
    ),
}
