"""
描述解析测试包初始化文件
"""
