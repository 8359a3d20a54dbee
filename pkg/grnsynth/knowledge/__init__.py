"""
LLM knowledge-base modules: prompts, chat clients, response cache, TF/regulator extraction
"""
