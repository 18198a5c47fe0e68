"""Fixed agent-signature vectors.

Each entry: (signature input with deliberately shuffled tools/config,
hand-written canonical bytes, SHA-256 of those bytes computed with
``openssl dgst -sha256``).
"""

VECTORS = [
    (
        {"prompt_template": "", "substitution_slots": [], "tools": [], "config": {}},
        '{"config":{},"prompt_template":"","substitution_slots":[],"tools":[]}',
        "0a41a0019c4810ceced156a71a8db6131e8c2c394af8416f7ca63b60cdb58325",
    ),
    (
        {"prompt_template": "You are a planner.", "config": {"temperature": 0, "model": "gpt-4o"}},
        '{"config":{"model":"gpt-4o","temperature":0},"prompt_template":"You are a planner.",'
        '"substitution_slots":[],"tools":[]}',
        "459a4dec1d9992f995e892b7fe8d993515621a2cda508f6c7ab897e1cb7c638d",
    ),
    (
        {"prompt_template": "Scan {repo} on {branch}.", "substitution_slots": ["repo", "branch"]},
        '{"config":{},"prompt_template":"Scan {repo} on {branch}.","substitution_slots":["branch","repo"],'
        '"tools":[]}',
        "443aacfc546b24a92d64d9ed3fa0abf96e837b3cc550d22d768c18cac9a8d8b7",
    ),
    (
        {
            "prompt_template": "Classify {manifest}",
            "substitution_slots": ["manifest"],
            "tools": [{"name": "list_ecosystems", "signature": "()", "description": "Query osv.dev ecosystems"}],
            "config": {"max_tokens": 512},
        },
        '{"config":{"max_tokens":512},"prompt_template":"Classify {manifest}","substitution_slots":["manifest"],'
        '"tools":[{"description":"Query osv.dev ecosystems","name":"list_ecosystems","signature":"()"}]}',
        "436609a762ed9e756a538cff3150d7b1cf2ab0d0d6dfd866425a2d8d23c6d15e",
    ),
    (
        {
            "prompt_template": "x",
            "tools": [
                {"name": "beta", "signature": "(y: str)", "description": ""},
                {"name": "alpha", "signature": "(x: int)", "description": ""},
            ],
            "config": {"c": 1.5, "a": True, "b": None},
        },
        '{"config":{"a":true,"b":null,"c":1.5},"prompt_template":"x","substitution_slots":[],'
        '"tools":[{"description":"","name":"alpha","signature":"(x: int)"},'
        '{"description":"","name":"beta","signature":"(y: str)"}]}',
        "cfb79db4f811c16c1901cbfc33e23231148597dcef6ce0753c60e3430a05ee87",
    ),
    (
        {
            "prompt_template": "Patch {package} to {version}",
            "substitution_slots": ["version", "package"],
            "tools": [
                {"name": "merge_pr", "signature": "(number: int)", "description": "Merge a pull request"},
                {"name": "create_pr", "signature": "(title: str, body: str)", "description": "Open a pull request"},
            ],
            "config": {"top_p": 0.9, "model": "llama-3"},
        },
        '{"config":{"model":"llama-3","top_p":0.9},"prompt_template":"Patch {package} to {version}",'
        '"substitution_slots":["package","version"],"tools":[{"description":"Open a pull request",'
        '"name":"create_pr","signature":"(title: str, body: str)"},{"description":"Merge a pull request",'
        '"name":"merge_pr","signature":"(number: int)"}]}',
        "b0fff54a7192a4f26f110c5d90f0721bc6dcbab2d656ba37be93f393d90fc3b5",
    ),
    (
        {"prompt_template": "Résumé: {text}", "substitution_slots": ["text"], "config": {"région": "eu"}},
        '{"config":{"région":"eu"},"prompt_template":"Résumé: {text}","substitution_slots":["text"],"tools":[]}',
        "b9803cd37b6565f99d182d8bfca2f91da76d7599fd323af3d5a4b3d274115728",
    ),
    (
        {"prompt_template": "literal {not_a_slot} stays"},
        '{"config":{},"prompt_template":"literal {not_a_slot} stays","substitution_slots":[],"tools":[]}',
        "9df99172ffc96ec8c59eb74d45fac1fea8f55fcf3086aabee28d0e2298d4c79d",
    ),
    (
        {
            "prompt_template": "Supervise the workflow.",
            "tools": [
                {"name": "planner", "signature": "(repo)", "description": "delegate to planner"},
                {"name": "patcher", "signature": "(plan)", "description": "delegate to patcher"},
                {"name": "classifier", "signature": "(manifest)", "description": "delegate to classifier"},
            ],
            "config": {"temperature": 0.2},
        },
        '{"config":{"temperature":0.2},"prompt_template":"Supervise the workflow.","substitution_slots":[],'
        '"tools":[{"description":"delegate to classifier","name":"classifier","signature":"(manifest)"},'
        '{"description":"delegate to patcher","name":"patcher","signature":"(plan)"},'
        '{"description":"delegate to planner","name":"planner","signature":"(repo)"}]}',
        "c252ae32fc065037cbbfa77344cb12b9c66246a7527955bbe83c1ac3c7fb1fa0",
    ),
    (
        {"prompt_template": 'quote " and backslash \\ and newline\n', "config": {"z": "last", "aa": "first"}},
        '{"config":{"aa":"first","z":"last"},"prompt_template":"quote \\" and backslash \\\\ and newline\\n",'
        '"substitution_slots":[],"tools":[]}',
        "c521c59cc32186d3243346ef5d432abdc4809ce73dc231cfc06ef4ead09959aa",
    ),
]
