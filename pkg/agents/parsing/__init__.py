"""模型描述解析：词表规范化、自然语言与结构化描述解析"""
