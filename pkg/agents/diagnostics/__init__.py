"""词元范数与换输入盲测诊断"""
