"""
诊断测试包初始化文件
"""
