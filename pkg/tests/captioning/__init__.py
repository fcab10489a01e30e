"""
描述生成测试包初始化文件
"""
